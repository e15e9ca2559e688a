#pragma once

#include "hpca/error.hpp"
#include "hpca/panel.hpp"
#include "hpca/eigen.hpp"
#include "hpca/sector_pca.hpp"
#include "hpca/hpca_core.hpp"
#include "hpca/rmt.hpp"
#include "hpca/synth.hpp"
#include "hpca/report.hpp"
