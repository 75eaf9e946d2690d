#pragma once

// Umbrella header: the whole simulator.

#include "duality/amplitude.hpp"
#include "duality/apparatus.hpp"
#include "duality/detection.hpp"
#include "duality/engine.hpp"
#include "duality/errors.hpp"
#include "duality/experiment.hpp"
#include "duality/fitting.hpp"
#include "duality/focal_field.hpp"
#include "duality/fresnel.hpp"
#include "duality/models.hpp"
#include "duality/phase_ledger.hpp"
#include "duality/placement.hpp"
#include "duality/report.hpp"
#include "duality/rng.hpp"
#include "duality/sampling.hpp"
#include "duality/units.hpp"
#include "duality/version.hpp"
