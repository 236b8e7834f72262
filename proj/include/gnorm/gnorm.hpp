#pragma once

#include "gnorm/bounds.hpp"
#include "gnorm/error.hpp"
#include "gnorm/group_ring.hpp"
#include "gnorm/lambda_lower.hpp"
#include "gnorm/presentation.hpp"
#include "gnorm/rational.hpp"
#include "gnorm/rep_search.hpp"
#include "gnorm/sdp_solver.hpp"
#include "gnorm/serialize.hpp"
#include "gnorm/universal_upper.hpp"
#include "gnorm/word.hpp"
#include "gnorm/word_problem.hpp"
