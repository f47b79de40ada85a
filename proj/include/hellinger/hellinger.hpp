#pragma once

#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"
#include "hellinger/complex_io.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/recurrence.hpp"
#include "hellinger/voc.hpp"
#include "hellinger/parallel.hpp"
#include "hellinger/lp_analysis.hpp"
#include "hellinger/exact.hpp"
#include "hellinger/experiments.hpp"
#include "hellinger/report.hpp"
