#pragma once

#include "posir/core_stat.hpp"
#include "posir/coverage_sim.hpp"
#include "posir/error.hpp"
#include "posir/format.hpp"
#include "posir/inference.hpp"
#include "posir/ndstat.hpp"
#include "posir/noise.hpp"
#include "posir/parallel.hpp"
#include "posir/pruned_sup.hpp"
#include "posir/quantile_engine.hpp"
#include "posir/segmentation.hpp"
