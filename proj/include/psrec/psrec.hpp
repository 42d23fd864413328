#pragma once

// Umbrella header: the whole point-source recognition pipeline.

#include "psrec/classes.hpp"      // IWYU pragma: export
#include "psrec/config.hpp"       // IWYU pragma: export
#include "psrec/errors.hpp"       // IWYU pragma: export
#include "psrec/evaluation.hpp"   // IWYU pragma: export
#include "psrec/events.hpp"       // IWYU pragma: export
#include "psrec/features.hpp"     // IWYU pragma: export
#include "psrec/gbt.hpp"          // IWYU pragma: export
#include "psrec/granular.hpp"     // IWYU pragma: export
#include "psrec/io.hpp"           // IWYU pragma: export
#include "psrec/model_io.hpp"     // IWYU pragma: export
#include "psrec/peaks.hpp"        // IWYU pragma: export
#include "psrec/pipeline.hpp"     // IWYU pragma: export
#include "psrec/random.hpp"       // IWYU pragma: export
#include "psrec/simulate.hpp"     // IWYU pragma: export
#include "psrec/svm.hpp"          // IWYU pragma: export
