#pragma once

#include "hslab/boltzmann/dsmc.hpp"
#include "hslab/boltzmann/series.hpp"
#include "hslab/chaos/duality.hpp"
#include "hslab/chaos/experiment.hpp"
#include "hslab/chaos/seminorm.hpp"
#include "hslab/core/collision.hpp"
#include "hslab/core/configuration.hpp"
#include "hslab/core/flow.hpp"
#include "hslab/dual/evaluate.hpp"
#include "hslab/dual/norm.hpp"
#include "hslab/ensembles/ensemble.hpp"
#include "hslab/ensembles/manifest.hpp"
#include "hslab/experiments/chaos_run.hpp"
#include "hslab/experiments/dsmc_check.hpp"
#include "hslab/experiments/duality_check.hpp"
#include "hslab/experiments/flow_validate.hpp"
#include "hslab/experiments/hat_probe.hpp"
#include "hslab/experiments/jacobian_check.hpp"
#include "hslab/experiments/singular_scaling.hpp"
#include "hslab/pseudo/duhamel.hpp"
#include "hslab/pseudo/vset.hpp"
