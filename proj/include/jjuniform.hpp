#pragma once

#include "jjuniform/analysis.hpp"
#include "jjuniform/compensation.hpp"
#include "jjuniform/config.hpp"
#include "jjuniform/csv_io.hpp"
#include "jjuniform/errors.hpp"
#include "jjuniform/fieldmap.hpp"
#include "jjuniform/image.hpp"
#include "jjuniform/imaging.hpp"
#include "jjuniform/layout.hpp"
#include "jjuniform/least_squares.hpp"
#include "jjuniform/report.hpp"
#include "jjuniform/shadow_model.hpp"
#include "jjuniform/synth.hpp"
