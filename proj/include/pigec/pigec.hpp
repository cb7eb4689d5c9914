#pragma once

// Everything except the HTTP backend (pigec/llm_http.hpp).

#include "pigec/align.hpp"
#include "pigec/corpus.hpp"
#include "pigec/edits.hpp"
#include "pigec/errors.hpp"
#include "pigec/eval.hpp"
#include "pigec/llm.hpp"
#include "pigec/m2.hpp"
#include "pigec/pi.hpp"
#include "pigec/text.hpp"
