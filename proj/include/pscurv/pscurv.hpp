#pragma once

#include "numeric.hpp"
#include "quadrature.hpp"
#include "bubble.hpp"
#include "sphere.hpp"
#include "smooth.hpp"
#include "field.hpp"
#include "moments.hpp"
#include "functional.hpp"
#include "degree.hpp"
#include "ladder.hpp"
#include "identities.hpp"
