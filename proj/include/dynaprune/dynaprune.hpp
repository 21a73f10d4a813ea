#pragma once

#include "dynaprune/analysis.hpp"
#include "dynaprune/config.hpp"
#include "dynaprune/dataset.hpp"
#include "dynaprune/driver.hpp"
#include "dynaprune/learner.hpp"
#include "dynaprune/policies.hpp"
#include "dynaprune/report.hpp"
#include "dynaprune/rng.hpp"
#include "dynaprune/scoreboard.hpp"
