#pragma once

// Umbrella header.

#include "mnm/tables.hpp"
#include "mnm/mdp.hpp"
#include "mnm/evaluation.hpp"
#include "mnm/trajectories.hpp"
#include "mnm/rng.hpp"
#include "mnm/environments.hpp"
#include "mnm/classifier.hpp"
#include "mnm/bounds.hpp"
#include "mnm/solvers.hpp"
#include "mnm/qlearning.hpp"
#include "mnm/random_instances.hpp"
#include "mnm/verification.hpp"
#include "mnm/config.hpp"
#include "mnm/experiments.hpp"
