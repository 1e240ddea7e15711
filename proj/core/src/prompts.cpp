#include "toolcheck/prompts.hpp"

namespace toolcheck::prompts {

const std::string_view kToolCallingInstruction = R"tpl(You are a tool calling assistant. In order to complete the user's request, you need to select one or more appropriate tools from the following tools and fill in the correct values for the tool parameters. Your specific tasks are:
1. Make one or more function/tool calls to meet the request based on the question.
2. If none of the function can be used, point it out and refuse to answer.
3. If the given question lacks the parameters required by the function, also point it out.

{tools}

The output MUST strictly adhere to the following JSON format, and NO other text MUST be included.
The example format is as follows. Please make sure the parameter type is correct. If no function call is needed, please directly output an empty list "[]"

[
    {"name": "func_name1", "arguments": {"argument1": "value1", "argument2": "value2"}},
    ... (more tool calls as required)
])tpl";

// Reconstructed wording; kept in one place so it can be swapped out.
const std::string_view kRoundTwoInstruction = R"tpl(Review your function calling output above against the error checklist below. For each tool you called, compare your output with the listed errors and fix any that apply: wrong tool names, missing required parameters, wrong parameter types, empty values, redundant parameters, formatting problems, extra text, or a wrong number of calls. Then output the corrected function calling output only, as a JSON list in the required format, with no other text. If your previous output is already correct, output it again unchanged.)tpl";

const std::string_view kLocalChecklistTemplate = R"tpl(Task:
You are given information about a tool and an example template of an error checklist. Your task is to generate an error checklist for the tool in the same format as the template. More specifically, for each error, you should:
- Provide a **perfect query**. The query should be self-contained and contain all the necessary information for a correct tool call. For example: "Can you verify the access to the database named 'customer_data'?"
- Provide the **corresponding answer** from the model that evokes the error.
- Provide an **error message** that describes what went wrong.
- Provide a **thought** explaining how the error should be corrected.

Note: You should strictly follow the format of the template.

------

**Error Checklist Template**

Tool Information

name: 'name_of_the_tool'
description: 'description_of_the_tool'
parameters: {"parameter_1": {"type": "type_1", "description": "description_of_the_parameter"}, "parameter_2": {"type": "type_2", "description": "description_of_the_parameter"}} required parameters: ["parameter_1"]
(Include other relevant information about the tool if necessary.)

---

Error 2: Missing Required Parameter Error

Query: "a_query_that_calls_the_tool"

Function Calling Output: [{"name": "name_of_the_tool","arguments": {"parameter_2":"parameter_value"}}]

Error Message: {"error": "MissingRequiredParameter","message": "The 'parameter_1' parameter is required."}

Thought of Error: Parameter 'parameter_1' is missing. Ensure all required parameters ('parameter_1') are included in the function call.

---

Error 3: Invalid Parameter Type Error

Query: "a_query_that_calls_the_tool"

Function Calling Output:
[
  {
    "name": "name_of_the_tool",
    "arguments": {
      "parameter_1": "parameter_value",
      "parameter_2": "parameter_value (but not of type_2)"
    }
  }
]

Error Message:
{
  "error": "InvalidParameterType",
  "message": "The 'parameter_2' is not of 'type_2'."
}

Thought of Error:
Parameter 'parameter_2' should be of type 'type_2', but an invalid type was provided. Ensure all parameters match their expected types.

---

Error 4: Empty Parameter Value Error

Query: "a_query_that_calls_the_tool"

Function Calling Output:
[
  {
    "name": "name_of_the_tool",
    "arguments": {
      "parameter_1": "parameter_value",
      "parameter_2": ""
    }
  }
]

Error Message:
{
  "error": "EmptyParameterValue",
  "message": "The 'parameter_2' parameter cannot be empty."
}

Thought of Error:
Parameter 'parameter_2' has an empty value. It should not be empty as specified by the tool's requirements.

---

Error 5: Redundant Parameter Error

Query: "a_query_that_calls_the_tool (that only needs to fill in part of the parameters of the tool)"

Function Calling Output:
[
  {
    "name": "name_of_the_tool",
    "arguments": {
      "parameter_1": "parameter_value",
      "parameter_2": "parameter_value"
    }
  }
]

Error Message:
{
  "error": "RedundantParameter",
  "message": "The parameter 'parameter_2' is not indicated by the query and should not be called."
}

Thought of Error:
Parameter 'parameter_2' is unnecessary and was not specified in the query. Ensure only the required and specified parameters are included in the function call.

---

Error 6: Invalid Function Calling Output Format Error

Query: "a_query_that_calls_the_tool"

Function Calling Output:
{
  "Name": "name_of_the_tool",
  "Parameter": {
    "parameter_1": "parameter_value",
    "parameter_2": "parameter_value"
  }
}

Error Message:
{
  "error": "InvalidFormat",
  "message": "The function calling output does not follow the required format and cannot be parsed."
}

Thought of Error:
The output format is incorrect due to improperly formatted keys and symbols. The correct function calling output should be:
[
  {
    "name": "func_name1",
    "arguments": {
      "parameter_1": "value1",
      "parameter_2": "value2"
    }
  }
]

---

Error 7: Redundant Information Error

Query: "a_query_that_calls_the_tool"

Function Calling Output:
"Based on the query, I will make a function call to the 'name_of_the_tool' tool to get the query answered. Here is the output in the required JSON format:
[
  {
    'name': 'name_of_the_tool',
    'arguments': {
      'parameter_1': 'parameter_value',
      'parameter_2': 'parameter_value'
    }
  }
]"

Error Message:
{
  "error": "RedundantInformationError",
  "message": "The function calling output contains redundant text such as 'Based on the query, I will make a function call...' which is unnecessary."
}

Thought of Error:
No additional text should be included in the output. The correct function calling output should only contain:
[
  {
    "name": "func_name1",
    "arguments": {
      "parameter_1": "value1",
      "parameter_2": "value2"
    }
  }
]

------

Instructions

Now, generate an error checklist for the following tool:

<tool_info>

Note: You must strictly follow the format of the template.)tpl";

const std::string_view kNegativeSystemPrompt = R"tpl(You are provided with an error checklist, a tool calling query and its groundtruth answer.

The error checklist of an example tool is as follows:

<checklist>

Your task is to modify the groundtruth tool calling so that it fits one of the errors in the error checklist. For the Redundant Parameter Error, your generated redundant parameter should be one of the parameters in the tool information. If there is no extra parameter that can be chosen for Redundant Parameter Error, you can choose another errors.

##### Note: DO NOT include not-exist parameters in your response, e.g., "extra_param".
##### Note: You should return a modified response, for example: [{"name": "getSocialEnterpriseInfo", "arguments": {"enterprise_name": "CommunityGrowth"}}].
##### Note: Just provide the modified function calling output. DO NOT include other information.)tpl";

const std::string_view kNegativeUserPrompt = R"tpl(The user query is:
<user_query>
The groundtruth tool calling is:
<groundtruth>
Now please modify the groundtruth tool calling so that it meets one of the errors in the error checklist. Just return the modified tool calling. Do not explain your answer or include any other information.)tpl";

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    if (from.empty()) return text;
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

std::string render_tools_json(const std::vector<ToolSpec>& tools) {
    Value arr = Value::array();
    for (const auto& t : tools) arr.push_back(tool_spec_to_json(t));
    return render_compact(arr);
}

std::string render_instruction(const std::vector<ToolSpec>& tools) {
    return replace_all(std::string(kToolCallingInstruction), "{tools}", render_tools_json(tools));
}

std::string render_case_prompt(const EvalCase& c) { return render_instruction(c.tools) + "\n\n" + c.query; }

std::string render_tool_info(const ToolSpec& tool) {
    Value params = Value::object();
    for (const auto& p : tool.params) {
        Value info = Value::object();
        info["type"] = p.type_text.empty() ? param_type_to_string(p.type) : p.type_text;
        info["description"] = p.description;
        params[p.name] = std::move(info);
    }
    Value required = tool.required_names();
    return "name: '" + tool.name + "'\ndescription: '" + tool.description + "'\nparameters: " +
           render_compact(params) + " required parameters: " + render_compact(required);
}

}  // namespace toolcheck::prompts
