#pragma once

// Umbrella header: consensus ("mutual") shape estimation from binary
// segmentations via level-set evolution of an information-theoretic
// criterion, plus baseline fusers and the synthetic lozenge fixture.

#include "core.hpp"
#include "pgm.hpp"
#include "levelset.hpp"
#include "criterion.hpp"
#include "velocity.hpp"
#include "evolution.hpp"
#include "baselines.hpp"
#include "synthetic.hpp"
#include "runio.hpp"
