#pragma once

#include "hk/error.hpp"
#include "hk/geometry.hpp"
#include "hk/jet.hpp"
#include "hk/model_io.hpp"
#include "hk/norms.hpp"
#include "hk/spectrum.hpp"
#include "hk/embedding.hpp"
#include "hk/freemap.hpp"
#include "hk/torus_field.hpp"
#include "hk/guenther.hpp"
#include "hk/analysis.hpp"
#include "hk/acceptance.hpp"
#include "hk/config.hpp"
#include "hk/report.hpp"
