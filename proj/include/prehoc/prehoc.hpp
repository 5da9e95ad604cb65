#pragma once

#include "prehoc/agent.hpp"
#include "prehoc/error.hpp"
#include "prehoc/evaluation.hpp"
#include "prehoc/forest.hpp"
#include "prehoc/meta_features.hpp"
#include "prehoc/portfolio.hpp"
#include "prehoc/predictors.hpp"
#include "prehoc/stats.hpp"
#include "prehoc/tabular.hpp"
#include "prehoc/taxonomy.hpp"
#include "prehoc/text_features.hpp"
