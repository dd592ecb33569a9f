#pragma once

#include "hammersim/adjacency.hpp"
#include "hammersim/command.hpp"
#include "hammersim/config.hpp"
#include "hammersim/ecc.hpp"
#include "hammersim/engine.hpp"
#include "hammersim/geometry.hpp"
#include "hammersim/memory.hpp"
#include "hammersim/metrics.hpp"
#include "hammersim/mitigation.hpp"
#include "hammersim/rng.hpp"
#include "hammersim/sweep.hpp"
#include "hammersim/timing.hpp"
#include "hammersim/victim.hpp"
#include "hammersim/workload.hpp"
