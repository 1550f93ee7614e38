#pragma once

#include "noisebench/annotation.hpp"
#include "noisebench/attack.hpp"
#include "noisebench/denoise.hpp"
#include "noisebench/image.hpp"
#include "noisebench/metrics.hpp"
#include "noisebench/noise.hpp"
#include "noisebench/oracle.hpp"
#include "noisebench/png.hpp"
#include "noisebench/ppm.hpp"
#include "noisebench/remote.hpp"
#include "noisebench/report.hpp"
#include "noisebench/rng.hpp"
#include "noisebench/surrogate.hpp"
#include "noisebench/synthetic.hpp"
