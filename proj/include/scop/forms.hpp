#pragma once

#include <string>
#include <string_view>

namespace scop {

enum class FormOrigin { original, naive_paraphrase, icl_paraphrase, transferred_paraphrase };

std::string to_string(FormOrigin origin);
FormOrigin form_origin_from_string(std::string_view s);

/// One surface wording of a problem. Multiple-choice options are kept out
/// of the paraphrasable text and re-attached verbatim, so every form of a
/// problem carries a byte-identical options_block.
struct SurfaceForm {
    std::string form_id;
    std::string problem_id;
    std::string text;                // question text, options excluded
    std::string options_block;       // rendered options, empty for free-form
    FormOrigin origin = FormOrigin::original;
    std::string paraphraser_model;   // empty for original forms
};

} // namespace scop
