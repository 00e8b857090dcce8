#pragma once

#include "archetype/common.hpp"
#include "archetype/sequence.hpp"
#include "archetype/hmm.hpp"
#include "archetype/cluster.hpp"
#include "archetype/synth.hpp"
#include "archetype/baselines.hpp"
#include "archetype/eval.hpp"
#include "archetype/ingest.hpp"
#include "archetype/io.hpp"
