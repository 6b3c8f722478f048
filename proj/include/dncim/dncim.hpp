#pragma once

#include "dncim/contours.hpp"
#include "dncim/error.hpp"
#include "dncim/experiment.hpp"
#include "dncim/inference.hpp"
#include "dncim/io.hpp"
#include "dncim/linalg.hpp"
#include "dncim/models.hpp"
#include "dncim/optimize.hpp"
#include "dncim/parallel.hpp"
#include "dncim/random.hpp"
#include "dncim/specfun.hpp"
#include "dncim/stable.hpp"
#include "dncim/summaries.hpp"
