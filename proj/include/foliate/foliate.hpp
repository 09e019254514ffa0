#pragma once

#include "foliate/errors.hpp"
#include "foliate/jet.hpp"
#include "foliate/expr.hpp"
#include "foliate/linalg.hpp"
#include "foliate/manifold.hpp"
#include "foliate/almost_product.hpp"
#include "foliate/weighted.hpp"
#include "foliate/geodesic.hpp"
#include "foliate/identity.hpp"
#include "foliate/bounds.hpp"
#include "foliate/gallery.hpp"
#include "foliate/manifest.hpp"
#include "foliate/acceptance.hpp"
#include "foliate/report.hpp"
