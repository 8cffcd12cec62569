#pragma once

#include "kspp/error.hpp"
#include "kspp/spin_system.hpp"
#include "kspp/spin_algebra.hpp"
#include "kspp/fourier.hpp"
#include "kspp/ensemble.hpp"
#include "kspp/ledger.hpp"
#include "kspp/pulse.hpp"
#include "kspp/encoder.hpp"
#include "kspp/readout.hpp"
#include "kspp/config.hpp"
