#pragma once

#include "salab/error.hpp"
#include "salab/rng.hpp"
#include "salab/distributions.hpp"
#include "salab/matrix.hpp"
#include "salab/linproc.hpp"
#include "salab/sa.hpp"
#include "salab/diagnostics.hpp"
#include "salab/config.hpp"
#include "salab/experiment.hpp"
#include "salab/report.hpp"
