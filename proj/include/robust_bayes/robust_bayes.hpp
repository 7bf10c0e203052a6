#pragma once

// Umbrella header.

#include "robust_bayes/common.hpp"
#include "robust_bayes/lp.hpp"
#include "robust_bayes/decision.hpp"
#include "robust_bayes/stability.hpp"
#include "robust_bayes/selection.hpp"
#include "robust_bayes/scenarios.hpp"
#include "robust_bayes/io.hpp"
#include "robust_bayes/beliefs.hpp"
#include "robust_bayes/report.hpp"
