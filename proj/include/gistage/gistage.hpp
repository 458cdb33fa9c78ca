#pragma once

#include "gistage/calibration.hpp"
#include "gistage/csv_io.hpp"
#include "gistage/error.hpp"
#include "gistage/metrics.hpp"
#include "gistage/model.hpp"
#include "gistage/model_file.hpp"
#include "gistage/pipeline.hpp"
#include "gistage/simulate.hpp"
#include "gistage/stage.hpp"
#include "gistage/streaming_decoder.hpp"
#include "gistage/viterbi.hpp"
