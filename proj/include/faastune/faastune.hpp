#pragma once

#include "faastune/bench.hpp"
#include "faastune/core.hpp"
#include "faastune/eval.hpp"
#include "faastune/io.hpp"
#include "faastune/multiobj.hpp"
#include "faastune/optimize.hpp"
#include "faastune/pricing.hpp"
#include "faastune/provider.hpp"
#include "faastune/rng.hpp"
#include "faastune/space.hpp"
#include "faastune/stats.hpp"
#include "faastune/surrogate.hpp"
