#pragma once

// Sequential-choice bandit library: exact sequencing under geometric
// abandonment, optimistic online learners, and the seeded experiment
// harness. Include this for everything, or pick the pieces you need.

#include "scb/config.hpp"
#include "scb/errors.hpp"
#include "scb/experiment.hpp"
#include "scb/glm.hpp"
#include "scb/learner.hpp"
#include "scb/linalg.hpp"
#include "scb/link.hpp"
#include "scb/optimize.hpp"
#include "scb/oracle.hpp"
#include "scb/payoff.hpp"
#include "scb/rng.hpp"
#include "scb/simulate.hpp"
#include "scb/types.hpp"
