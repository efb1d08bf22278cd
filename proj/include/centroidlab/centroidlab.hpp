#pragma once

#include "centroidlab/analysis.hpp"
#include "centroidlab/core.hpp"
#include "centroidlab/exact.hpp"
#include "centroidlab/fenwick.hpp"
#include "centroidlab/limit.hpp"
#include "centroidlab/montecarlo.hpp"
#include "centroidlab/rng.hpp"
#include "centroidlab/special.hpp"
#include "centroidlab/treegen.hpp"
#include "centroidlab/verify.hpp"
