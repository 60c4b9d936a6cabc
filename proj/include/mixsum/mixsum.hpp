#pragma once

#include "mixsum/core.hpp"
#include "mixsum/datasets.hpp"
#include "mixsum/dpmm_gibbs.hpp"
#include "mixsum/evaluation.hpp"
#include "mixsum/io.hpp"
#include "mixsum/linalg.hpp"
#include "mixsum/measures.hpp"
#include "mixsum/ot_exact.hpp"
#include "mixsum/partition_loss.hpp"
#include "mixsum/pipeline.hpp"
#include "mixsum/sliced_ot.hpp"
#include "mixsum/summarizer.hpp"
