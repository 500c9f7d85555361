#pragma once

// Byte-identical copies of assets/prompts/*.txt (checked by test_taskspec).

namespace toolplay::default_prompts {

inline constexpr const char* kGenerator = R"TPL(You are an expert task generator for tool-calling agents.

FIRST, in your private scratch-pad, reason step-by-step to design a realistic, non-trivial task that cannot be solved without correctly calling one or sometimes multiple tools.

CONTROL SPEC (MUST FOLLOW EXACTLY):
- Domain: {domain}
- Context type: {context_type}  (single_turn or multi_turn)
- Number of available tools: {tool_menu_size} (<available_tools>)
- Number of gold tool calls: {num_calls} (<tool_call_answer>)

RULES TO SATISFY THE SPEC:
1) You MUST output exactly {tool_menu_size} tools in <available_tools>.
2) You MUST output exactly {num_calls} tool calls (JSON list length) in <tool_call_answer>.
3) Domain must be {domain}. Do not drift into other domains.
4) If context_type=multi_turn, embed a short conversation in <question> like: "# Conversation\nUser: ...\nAgent: ...\nUser: ...\nAgent: ..."
5) Tool arguments must be flat primitives only (no lists, no nested objects).
6) The function values (<value1>, <value2>, ...) MUST be present inside user question (<question>...</question>), otherwise agent cannot solve the task.

THEN, without revealing your reasoning, output the following four blocks in the exact format, NOTHING ELSE:

<think>
Your private reasoning here.
</think>

<question>
Write a natural user question (no bullet points, no meta-instructions, no placeholders).
It must be a natural question, be in domain "{domain}", and mention the exact argument values that appear in <tool_call_answer>.
</question>

<available_tools>
A JSON list of tools. Each tool MUST include: "name", "description", and "parameters". 
[
    {
        "name": "<tool_name>",
        "description": "<short description>",
        "parameters": {
        "<param1>": {"type": "<param1_type>", "description": "<param1_description>"},
        "<param2>": {"type": "<param2_type>", "description": "<param2_description>"},
        ...
        },
        "required": [<param1>, ...],
    },
    ...
]
</available_tools>

<tool_call_answer>
[
{\"name\": \"<tool_name>\", \"arguments\": {\"<param>\": <value>, ...}}
]
</tool_call_answer>

Generate a new tool-calling task now. Follow the CONTROL SPEC exactly and remember to format the output exactly as instructed.
)TPL";

inline constexpr const char* kSolver = R"TPL(A conversation between user and tool-calling assistant. The user asks a question, and the assistant uses tools to solve it. The assistant first thinks about the reasoning process in the mind and then provides the user with the answer. The reasoning process and answer are enclosed within <think>...</think> and 
<tool_call_answer>...</tool_call_answer> tags, i.e.:
<think> 
This is my reasoning. 
</think>
<tool_call_answer>
[
  {
    "name": "tool_name", 
    "arguments": {"arg1": "value", "arg2": "value2", ...}
  }
]
</tool_call_answer>

User Query:
<question>
USER_QUERY
</question>

Available Tools (JSON):
<available_tools>
TOOL_MENU
</available_tools>
)TPL";

inline constexpr const char* kJudge = R"TPL(You are a strict quality control judge for a synthetic data generation pipeline.
You will be given a User Question, Available Tools, and a Tool Call Answer.

Your job is to score the example on a scale of 1 to 5 based on TWO criteria:
1. **Question Quality**: Is the user question realistic, specific, and clear? (CRITICAL)
2. **Semantic Coherence**: Does the tool call actually solve the user's request?

Scoring Rubric:
- 5 (Perfect): The question is specific and realistic (e.g., "Book a flight to Paris on Dec 5th"). The tool call perfectly addresses it.
- 4 (Good): The question is good, but the tool call has minor issues (e.g., slightly different parameter values that still work).
- 3 (Passable): The question is vague or simple. The tool call matches it.
- 2 (Bad Question): The question is generic, placeholder text (e.g., "User request here", "Make a tool call"), or nonsense. **Score 2 or 1 immediately if the question is bad.**
- 1 (Failure): The tool call is completely unrelated, OR the question is clearly a template error (e.g., "A single concrete user request").

**IMPORTANT:** If the User Question looks like an instruction (e.g., "Generate a query...") rather than a natural user request, you MUST give a score of 1 or 2.

Reply with ONLY a single integer from 1 to 5.
)TPL";

}  // namespace toolplay::default_prompts
