#pragma once

#include "positivity/analysis.hpp"
#include "positivity/config.hpp"
#include "positivity/csv.hpp"
#include "positivity/dataset.hpp"
#include "positivity/density.hpp"
#include "positivity/explain.hpp"
#include "positivity/propensity.hpp"
#include "positivity/random.hpp"
#include "positivity/stats.hpp"
#include "positivity/svg.hpp"
#include "positivity/synth.hpp"
#include "positivity/tree.hpp"
#include "positivity/violation.hpp"
