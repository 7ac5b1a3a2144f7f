#pragma once

#include "qbl/rational.hpp"
#include "qbl/matrix.hpp"
#include "qbl/exact.hpp"
#include "qbl/dense.hpp"
#include "qbl/core.hpp"
#include "qbl/io.hpp"
#include "qbl/conditions.hpp"
#include "qbl/gaussian.hpp"
#include "qbl/verifier.hpp"
