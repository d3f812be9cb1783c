#pragma once

#include "nropf/common.hpp"
#include "nropf/grid.hpp"
#include "nropf/lp.hpp"
#include "nropf/opf.hpp"
#include "nropf/milp.hpp"
#include "nropf/datagen.hpp"
#include "nropf/gnn.hpp"
#include "nropf/pipeline.hpp"
