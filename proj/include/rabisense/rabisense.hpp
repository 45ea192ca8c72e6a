// rabisense.hpp — Umbrella include

#pragma once

#include "rabisense/core.hpp"
#include "rabisense/matrix_utils.hpp"
#include "rabisense/hilbert.hpp"
#include "rabisense/ode.hpp"
#include "rabisense/dynamics.hpp"
#include "rabisense/analytics.hpp"
#include "rabisense/metrology.hpp"
#include "rabisense/protocol.hpp"
