#pragma once
// Everything except file I/O and the command pipelines (image_io.hpp, commands.hpp).

#include "turbrest/core.hpp"
#include "turbrest/drivers.hpp"
#include "turbrest/energy.hpp"
#include "turbrest/metrics.hpp"
#include "turbrest/quality.hpp"
#include "turbrest/rpca.hpp"
#include "turbrest/selector.hpp"
#include "turbrest/shrink.hpp"
#include "turbrest/simulator.hpp"
#include "turbrest/tvsolver.hpp"
