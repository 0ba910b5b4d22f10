#pragma once

#include "bjdecay/core.hpp"
#include "bjdecay/operator.hpp"
#include "bjdecay/boundfns.hpp"
#include "bjdecay/envelope.hpp"
#include "bjdecay/spectral.hpp"
#include "bjdecay/transfer.hpp"
#include "bjdecay/io.hpp"
#include "bjdecay/harness.hpp"
