#pragma once

#include "sclock/errors.hpp"
#include "sclock/clock.hpp"
#include "sclock/clock_transforms.hpp"
#include "sclock/transform_cache.hpp"
#include "sclock/barrier.hpp"
#include "sclock/black.hpp"
#include "sclock/vanilla.hpp"
#include "sclock/rng.hpp"
#include "sclock/mc.hpp"
#include "sclock/leverage/spectral.hpp"
#include "sclock/leverage/grids.hpp"
#include "sclock/leverage/duhamel.hpp"
#include "sclock/leverage/forced_pde.hpp"
#include "sclock/leverage/pade.hpp"
#include "sclock/leverage/expansion.hpp"
#include "sclock/calibrator.hpp"
#include "sclock/config.hpp"
#include "sclock/repro.hpp"
