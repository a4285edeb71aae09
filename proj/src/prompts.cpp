#include "avfm/agent_protocol.hpp"

// Template bodies; data/prompts/*.txt ships the same text byte-for-byte
// (checked by the protocol tests).

namespace avfm {

namespace {

const std::string kFilterGpt5 = R"PROMPT(Consider computer vision tasks in a scene of $scene.
Given a scene description and a list of 150 object names, output a JSON dictionary where each key is an object name and the value is 0 if the object is highly unlikely in the scene, otherwise 1.

Requirements:
- Output only valid JSON (no explanations or text before/after).
- Keys must match exactly the provided object names.
- A total of 150 key-value pairs.
- Values must be integers 0 or 1 only.

If multiple object names refer to ambiguous concepts, keep only one most likely to use when describing this particular scene.
For example:
- In a "sportsfield" scene, prefer "field" over "grass".
- In an outdoor scene, prefer "ground" over "floor".
- In an indoor scene, prefer "floor" over "ground".
- In an indoor scene, prefer "wall" over "building".
If there is no clear preference, you can keep both.

Object names:
$object_names.

Now output the JSON result only.
)PROMPT";

const std::string kFilterGemini = R"PROMPT(You are a JSON-producing assistant.
Consider computer vision tasks in a scene of $scene.
Given a scene description and a list of 150 object names, output a JSON dictionary where each key is an object name and the value is an integer:
- 1 if the object is likely or possible to be found in the scene.
- 0 if the object is highly unlikely or impossible in the scene.

Requirements:
- Starting with {{ and ending with }}. Do NOT use markdown or triple backticks.
- Output only valid JSON (no explanations or text before/after).
- Keys must match exactly the provided object names.
- A total of 150 key-value pairs.
- Values must be integers 0 or 1 only.

If multiple object names refer to ambiguous concepts, keep only one most likely to use when describing this particular scene.
For example:
- In a "sportsfield" scene, prefer "field" over "grass".
- In an outdoor scene, prefer "ground" over "floor".
- In an indoor scene, prefer "floor" over "ground".
- In an indoor scene, prefer "wall" over "building".
If there is no clear preference, you can keep both.

Object names:
$object_names.

Now output the JSON result only.
)PROMPT";

const std::string kFilterTopk = R"PROMPT(Consider computer vision tasks in a scene of $scene.
Given a scene description and a list of 150 object names, output only the top $k most relevant objects likely to appear in this scene.

Requirements:
- Output only valid JSON (no explanations or text before/after).
- Keys must match exactly the provided object names.
- A total of 150 key-value pairs.
- Values must be integers 0 or 1 only.

If multiple object names refer to ambiguous concepts, keep only one most likely to use when describing this particular scene.
For example:
- In a "sportsfield" scene, prefer "field" over "grass".
- In an outdoor scene, prefer "ground" over "floor".
- In an indoor scene, prefer "floor" over "ground".
- In an indoor scene, prefer "wall" over "building".
If there is no clear preference, you can keep both.

Object names:
$object_names.

Now output the JSON result only.
)PROMPT";

const std::string kSceneAnnotation = R"PROMPT(Given an input image, imagine it comes from a computer vision benchmark such as ADE20K.

1. Infer the single most appropriate scene or location category depicted in the image.
2. Use a WordNet-style noun phrase that is semantically aligned with ADE20K scene labels (e.g., "residential street", "indoor office", "natural park", "industrial warehouse").
3. Prefer generic, canonical scene names over narrative descriptions.

Output format (mandatory):
Output only one phrase.
Do NOT use a code block, do NOT use markdown, and do NOT include quotes.
Only output the raw string itself (e.g., residential street).
)PROMPT";

}  // namespace

const std::string& prompt_template(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::filter_gpt5: return kFilterGpt5;
    case PromptVariant::filter_gemini: return kFilterGemini;
    case PromptVariant::filter_topk: return kFilterTopk;
    case PromptVariant::scene_annotation: return kSceneAnnotation;
  }
  throw ValidationError("unknown prompt variant");
}

}  // namespace avfm
