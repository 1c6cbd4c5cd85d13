#pragma once

#include "mettle/bytes.hpp"
#include "mettle/channel.hpp"
#include "mettle/decoder.hpp"
#include "mettle/edge_set.hpp"
#include "mettle/encoder.hpp"
#include "mettle/experiment.hpp"
#include "mettle/gf2.hpp"
#include "mettle/hashing.hpp"
#include "mettle/lt.hpp"
#include "mettle/params.hpp"
#include "mettle/rational.hpp"
#include "mettle/wire.hpp"
