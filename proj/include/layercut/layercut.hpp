#pragma once

#include "layercut/camera.hpp"
#include "layercut/compose.hpp"
#include "layercut/decompose.hpp"
#include "layercut/guidance.hpp"
#include "layercut/guidance_remote.hpp"
#include "layercut/image.hpp"
#include "layercut/io.hpp"
#include "layercut/kdtree.hpp"
#include "layercut/losses.hpp"
#include "layercut/math.hpp"
#include "layercut/mesh.hpp"
#include "layercut/mesh_query.hpp"
#include "layercut/metrics.hpp"
#include "layercut/optim.hpp"
#include "layercut/raster.hpp"
#include "layercut/rig.hpp"
#include "layercut/seglift.hpp"
#include "layercut/synthetic.hpp"
#include "layercut/tetgrid.hpp"
#include "layercut/threads.hpp"
