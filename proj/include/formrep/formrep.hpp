#pragma once

#include "formrep/types.hpp"
#include "formrep/linalg.hpp"
#include "formrep/core_forms.hpp"
#include "formrep/oracle.hpp"
#include "formrep/linearize.hpp"
#include "formrep/canonical.hpp"
#include "formrep/generators.hpp"
