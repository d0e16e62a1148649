#pragma once

#include "routhlab/calculus.hpp"
#include "routhlab/errors.hpp"
#include "routhlab/expression.hpp"
#include "routhlab/homogenize.hpp"
#include "routhlab/jet.hpp"
#include "routhlab/lagrangian.hpp"
#include "routhlab/linalg.hpp"
#include "routhlab/ode.hpp"
#include "routhlab/report.hpp"
#include "routhlab/routh.hpp"
#include "routhlab/spray.hpp"
#include "routhlab/suites.hpp"
#include "routhlab/verify.hpp"
