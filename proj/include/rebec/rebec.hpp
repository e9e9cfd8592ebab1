#pragma once

#include "rebec/error.hpp"
#include "rebec/external_model.hpp"
#include "rebec/forcing_noise.hpp"
#include "rebec/metrics.hpp"
#include "rebec/param_space.hpp"
#include "rebec/random.hpp"
#include "rebec/robust_fitness.hpp"
#include "rebec/spea2.hpp"
#include "rebec/surface.hpp"
#include "rebec/wave_model.hpp"
#include "rebec/wind_field.hpp"
