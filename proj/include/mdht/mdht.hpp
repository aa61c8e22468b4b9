#pragma once

#include "error.hpp"
#include "rational.hpp"
#include "direction_sets.hpp"
#include "field.hpp"
#include "fft.hpp"
#include "spectral_transform.hpp"
#include "norm_probe.hpp"
#include "cell_geometry.hpp"
#include "roundup.hpp"
#include "certifier.hpp"
#include "mdht/harness.hpp"
