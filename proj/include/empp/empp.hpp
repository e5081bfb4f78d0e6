#pragma once

#include "empp/dynamics.hpp"
#include "empp/experiments.hpp"
#include "empp/martingale.hpp"
#include "empp/numeric.hpp"
#include "empp/paraproduct.hpp"
#include "empp/rng.hpp"
#include "empp/space.hpp"
