#pragma once

#include "varqqa/boolfn.hpp"
#include "varqqa/error.hpp"
#include "varqqa/lossgrad.hpp"
#include "varqqa/optimizer.hpp"
#include "varqqa/qcircuit.hpp"
#include "varqqa/record_io.hpp"
#include "varqqa/search.hpp"
#include "varqqa/uparam.hpp"
#include "varqqa/version.hpp"
