#ifndef MIMO_RADAR_MIMO_RADAR_HPP
#define MIMO_RADAR_MIMO_RADAR_HPP

#include "mimo_radar/core.hpp"
#include "mimo_radar/scene.hpp"
#include "mimo_radar/waveform.hpp"
#include "mimo_radar/rng.hpp"
#include "mimo_radar/synth.hpp"
#include "mimo_radar/hypoexponential.hpp"
#include "mimo_radar/estimation.hpp"
#include "mimo_radar/detection.hpp"
#include "mimo_radar/localization.hpp"
#include "mimo_radar/experiments.hpp"
#include "mimo_radar/config.hpp"
#include "mimo_radar/io.hpp"

#endif
