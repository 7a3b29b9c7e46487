#ifndef KBQGEN_KBQGEN_HPP
#define KBQGEN_KBQGEN_HPP

#include "kbqgen/arpa.hpp"
#include "kbqgen/embeddings.hpp"
#include "kbqgen/error.hpp"
#include "kbqgen/expander.hpp"
#include "kbqgen/http_provider.hpp"
#include "kbqgen/kb.hpp"
#include "kbqgen/lm.hpp"
#include "kbqgen/pipeline.hpp"
#include "kbqgen/templates.hpp"
#include "kbqgen/text.hpp"

#endif
