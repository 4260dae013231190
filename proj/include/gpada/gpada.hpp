#pragma once

#include "gpada/bench.hpp"
#include "gpada/config.hpp"
#include "gpada/dataset.hpp"
#include "gpada/gp.hpp"
#include "gpada/kernel.hpp"
#include "gpada/loop.hpp"
#include "gpada/metrics.hpp"
#include "gpada/model.hpp"
#include "gpada/pool.hpp"
#include "gpada/sampling.hpp"
#include "gpada/svg_report.hpp"
#include "gpada/synthetic.hpp"
