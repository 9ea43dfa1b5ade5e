#pragma once

#include "gws/bench.hpp"
#include "gws/bounds.hpp"
#include "gws/linear_ot.hpp"
#include "gws/mm_space.hpp"
#include "gws/rng.hpp"
#include "gws/sampling.hpp"
#include "gws/serialization.hpp"
#include "gws/solvers.hpp"
#include "gws/special_functions.hpp"
#include "gws/sphere.hpp"
#include "gws/wasserstein1d.hpp"
