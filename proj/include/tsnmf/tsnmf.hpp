#pragma once

#include "tsnmf/artifacts.hpp"
#include "tsnmf/assignment.hpp"
#include "tsnmf/errors.hpp"
#include "tsnmf/evaluation.hpp"
#include "tsnmf/experiment.hpp"
#include "tsnmf/factorization.hpp"
#include "tsnmf/matrix.hpp"
#include "tsnmf/matrix_io.hpp"
#include "tsnmf/preprocessing.hpp"
#include "tsnmf/random.hpp"
#include "tsnmf/supervision.hpp"
#include "tsnmf/synthetic.hpp"
