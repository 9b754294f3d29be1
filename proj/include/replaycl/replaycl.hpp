#ifndef REPLAYCL_REPLAYCL_HPP
#define REPLAYCL_REPLAYCL_HPP

#include "replaycl/config.hpp"
#include "replaycl/dataset.hpp"
#include "replaycl/experiment.hpp"
#include "replaycl/gan.hpp"
#include "replaycl/grad_check.hpp"
#include "replaycl/layers.hpp"
#include "replaycl/metrics.hpp"
#include "replaycl/models.hpp"
#include "replaycl/optim.hpp"
#include "replaycl/pipeline.hpp"
#include "replaycl/replay.hpp"
#include "replaycl/rng.hpp"
#include "replaycl/scaler.hpp"
#include "replaycl/tasks.hpp"
#include "replaycl/tensor.hpp"

#endif  // REPLAYCL_REPLAYCL_HPP
