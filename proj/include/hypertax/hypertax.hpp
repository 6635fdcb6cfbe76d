#pragma once

#include "hypertax/config.hpp"
#include "hypertax/errors.hpp"
#include "hypertax/evaluator.hpp"
#include "hypertax/features.hpp"
#include "hypertax/geometry.hpp"
#include "hypertax/graph.hpp"
#include "hypertax/io.hpp"
#include "hypertax/metrics.hpp"
#include "hypertax/rng.hpp"
#include "hypertax/trainer.hpp"
#include "hypertax/version.hpp"
