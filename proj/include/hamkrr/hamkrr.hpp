#pragma once

#include "hamkrr/core.hpp"
#include "hamkrr/dynamics.hpp"
#include "hamkrr/estimator.hpp"
#include "hamkrr/evaluation.hpp"
#include "hamkrr/gram.hpp"
#include "hamkrr/io.hpp"
#include "hamkrr/kernel.hpp"
#include "hamkrr/modelselect.hpp"
#include "hamkrr/online.hpp"
#include "hamkrr/random.hpp"
#include "hamkrr/systems.hpp"
