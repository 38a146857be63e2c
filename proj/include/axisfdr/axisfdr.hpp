#pragma once

#include "axisfdr/analysis.hpp"
#include "axisfdr/directional.hpp"
#include "axisfdr/empirical_null.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/pipeline.hpp"
#include "axisfdr/report.hpp"
#include "axisfdr/rng.hpp"
#include "axisfdr/simulator.hpp"
#include "axisfdr/spatial.hpp"
#include "axisfdr/special_functions.hpp"
#include "axisfdr/test_statistics.hpp"
#include "axisfdr/version.hpp"
#include "axisfdr/volume.hpp"
#include "axisfdr/volume_io.hpp"
