#pragma once

#include "qref/baselines.hpp"
#include "qref/corpus.hpp"
#include "qref/error.hpp"
#include "qref/generator.hpp"
#include "qref/intents.hpp"
#include "qref/keyvalue.hpp"
#include "qref/labels.hpp"
#include "qref/metrics.hpp"
#include "qref/miner.hpp"
#include "qref/pipeline.hpp"
#include "qref/random.hpp"
#include "qref/rewrite_type.hpp"
