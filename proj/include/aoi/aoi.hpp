#pragma once

#include "aoi/phtype.hpp"
#include "aoi/zw_model.hpp"
#include "aoi/fp_model.hpp"
#include "aoi/aoi_metrics.hpp"
#include "aoi/model.hpp"
#include "aoi/simulator.hpp"
#include "aoi/optimizer.hpp"
#include "aoi/io.hpp"
