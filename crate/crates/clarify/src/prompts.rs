//! Prompt templates used by the pipeline and the evaluation harness, plus
//! builders that pair them with per-record payloads.
//!
//! Template text is behavioral surface and is kept exactly as shipped,
//! including the "infomation" spelling in the user-simulator prompts;
//! normalized variants are available behind a config switch.

use crate::gateway::{ChatMessage, ChatRequest, Role, Sampling};
use crate::model::{ApiDoc, DegradedRecord, KeyInfo};

/// System prompt for unspecified-query generation.
pub const DEGRADE_SYSTEM: &str = r#"You are an unspecified query generation assistant. Your task is to modify a user query by removing specific parameters, generating a query that reflects unspecified user intent.

### Input Structure:
You will receive the following fields:
- `original_query`: A complete description of the user's task.
- `key_info`: A record of the APIs and parameters needed to resolve the query. Each parameter includes a `removed` field that indicates whether the parameter should be removed (true) or retained (false).

### Task Requirements:
1. Identify parameters to be removed: focus on parameters where the `removed` field is true.
2. Apply a removal strategy:
- Completely Removed: The parameter's value is fully removed, but the query remains grammatically correct, introducing unspecified user intent.
- Semantically Abstracted: The value of the parameter is replaced with a more abstract term, indicating a lack of clear user intent.
The decision on which strategy to use should be made based on the context.
3. Ensure grammatical integrity: after modifying the parameters, ensure that the query still makes sense and retains its structure, even though some user intent is now unspecified.
4. No other modifications: only modify the parameters where removed = true. All other parts of the query should remain unchanged.

### Output:
For each parameter where removed = true, provide the following:
- The original value of the parameter from the original query.
- The current value of the parameter after being removed or abstracted.
- Keep the removed field unchanged.
Return a single JSON object that contains unspecified query and modified `key_info`."#;

/// System prompt for task decomposition.
pub const DECOMPOSE_SYSTEM: &str = r#"You are a smart task decomposition assistant. Your goal is to break down the user's main task into smaller, manageable subtasks. Please follow the instructions below:

You will receive a JSON-formatted input containing:
- Query: A description of the main task the user wants to accomplish.
- APIs:  A list of APIs available to solve the task, each with a unique identifier and a description of its functionality. Note: The APIs are provided in the exact order necessary to resolve the task.

### Task Decomposition:
1. Analyze the query to understand the user's main task.
2. Break it down into smaller, manageable subtasks that can be handled using the provided APIs. Ensure that each subtask is completed by calling one of the APIs in the exact order they are listed.

Your output should be a JSON object with the following structure:
{
  "tool_steps": [
    "Step <number>: <subtask description> using <API name>.",
    ...
  ]
}"#;

/// System prompt for clarification-question generation.
pub const QUESTION_SYSTEM: &str = r#"You are an assistant responsible for generating clarification questions for missing information in a user's query.

### Input Structure:
The input should contain the following fields:
- `original_query`: A complete user task description.
- `unspecified_query`: A user task description missing some key information.
- `key_info`: This should record the APIs and parameters needed to solve the user task, including information about any missing parameters.
    - `original`: The original value of the parameter, if available.
    - `current`: The current value of the parameter after the modification, if available.
    - `removed`: Indicates if the parameter's value is clear (false) or unspecified (true).

### Task Requirements:
For each parameter where the field `removed` is set to true, you are to generate a clarification question.
- If multiple API calls rely on the same missing information, form a single combined question to efficiently gather the required details, rather than asking multiple separate questions.
- Each question should focus on gathering one specific piece of information to improve the precision of the query and avoid ambiguity.
- Do not ask about information that can be inferred from context or API interactions. Only generate clarification questions for details that cannot be deduced from the given context or API responses.
- Add a `question` field to the corresponding parameter in `key_info`, which contains the generated clarification question.
- Do not modify the `original`, `current` or any other fields in `key_info`.

### Output:
Only output the modified `key_info` in JSON format, ensuring that the question field contains the clarification question for each missing parameter."#;

/// System prompt for generating clearly-stated-intent error questions.
/// `{choose_pos}` selects the target ordinal.
pub const ERROR_CLEARLY_STATED_SYSTEM: &str = r#"You are a smart assistant. Your task is to generate a JSON object based on the given input. Please follow these instructions:

### Input Structure:
The input should contain the following fields:
- `original_query`: A complete user task description.
- `unspecified_query`: A user task description missing some key information.
- `key_info`: This should record the APIs and parameters needed to solve the user task, including information about any missing parameters.

### Key Requirements:
1. From the `key_info`, randomly select one parameter where `removed` is true (select the {choose_pos} one you encounter) and assume that its value is missing.
2. Generate a specific clarification question related to the missing parameter, such that the answer would provide the value from the `original` field of that parameter, and save it in the `question` field of that parameter.
3. No other content in `key_info` should be modified.

### Output:
Only output the modified `key_info` in JSON format, ensuring that the `question` field contains the clarification question."#;

/// System prompt for generating imprecise error questions.
pub const ERROR_IMPRECISE_SYSTEM: &str = r#"You are a smart assistant. Your task is to generate a JSON object based on the given input. Please follow these instructions:

### Input Structure:
The input should contain the following fields:
- `original_query`: A complete user task description.
- `unspecified_query`: A user task description missing some key information.
- `key_info`: This should record the APIs and parameters needed to solve the user task, including information about any missing parameters.

### Key Requirements:
1. From the `key_info`, randomly select one parameter where the field `removed` is set to true (select the {choose_pos} one you encounter) and assume that its value is missing.
2. Generate an imprecise clarifying question about the missing parameter:
- This question should seem relevant to the user task.
- However, it should be less precise than the original information provided in the question field of the selected parameter.
- The goal is to make the question introduce ambiguity, meaning it should be unclear what exactly needs to be answered, thus creating confusion about how to provide a precise and accurate response.
3. Directly add this imprecise question to the selected parameter in the `imprecise_question` field.
4. No other content in `key_info` should be modified.

### Output:
Only output the modified `key_info` in JSON format, ensuring that the selected parameter now contains the imprecise question."#;

/// System prompt for generating irrelevant error questions.
pub const ERROR_IRRELEVANT_SYSTEM: &str = r#"You are a smart assistant. Your task is to generate a JSON object based on the given input. Please follow these instructions:

### Input Structure:
The input should contain the following fields:
- `original_query`: A complete user task description.
- `unspecified_query`: A user task description missing some key information.
- `key_info`: This should record the APIs and parameters needed to solve the user task, including information about any missing parameters.

### Key Requirements:
1. From the `key_info`, randomly select one API parameter (select the first {choose_pos} parameter you encounter).
2. Generate a question that appears relevant to the user task but is actually unhelpful for solving the task using the APIs in `key_info`.
3. Directly add this irrelevant question to the selected parameter in the `irrelevant_question` field.
4. No other content in `key_info` should be modified.

### Output:
Only output the modified `key_info` in JSON format, ensuring that the selected parameter now contains the irrelevant question."#;

/// System prompt given to candidate assistants under evaluation.
pub const EVALUATION_SYSTEM: &str = r#"You are an assistant helping users solve their tasks. You will receive a task and relevant APIs to address this task. However, the task description may lack key information. You cannot make assumptions or guess missing parameters based on what you know. Instead, you need to follow these steps to effectively complete the task, ensuring each step is completed before moving on to the next one:

### Step 1: Task Decomposition
1. Analyze the User's Task: Identify distinct subtasks within the user's task, each of which can be solved by a single API.
2. Determine the Order of Subtasks: Establish the sequence of these subtasks based on dependencies and the order in which they appear in the user's original task.
- Template: [TASK DECOMPOSITION] xxx
3. Evaluate Parameters for Each API: Based on the established API order, verify whether each parameter is explicitly stated in the task; if any are missing, prepare to inquire in subsequent steps.
- Template: [PARAMETER EVALUATION] xxx

### Step 2: Inquire About Missing Parameters
1. Present Your Inquiry: Formulate a friendly question for the user. Ensure you ask only one question at a time.
- Template: [QUESTION] xxx
2. Wait for the User's Response: Collect the user's answer. If the user does not provide an answer, please do not fill in the parameters on your own.
3. Repeat: Continue step 2 until all necessary parameters are gathered.

### Step 3: Final Summary and Solution Path
1. Summarize User Intentions: Once all information is collected, concisely summarize what the user intends to achieve.
2. Define the Solution Path: List the APIs and their specific parameter values in the order they will be called, and output the final solution path in JSON format. Remember, you do not need to execute the APIs or solve the task yourself.
- Template: [SUMMARY] [{"task": "API name", "arguments": [{"name": "parameter name", "value": "parameter value"}, ...]}, ...]"#;

/// Base user-simulator prompt. `{task_description}` is the full original
/// task. The "infomation" spelling is part of the shipped template.
pub const USER_SIM_BASE: &str = r#"I can honestly answer questions based on what I know. I only know that I have provided others with a task: {task_description}, which is described from my perspective. Aside from that, I do not know anything else. However, others may be unclear about some details of this task. When others ask me questions, I should choose one appropriate response from the following three options, in the given order:

1. Cannot answer multiple infomation at once:
- I will carefully evaluate the structure of the question to identify if multiple pieces of information are being requested, especially regarding multiple [QUESTION]s.
- If multiple questions are asked, I will clearly state that multiple questions have been asked and will not disclose any other information.
- Template: "I cannot answer multiple questions at once. Please ask one question at a time."

2. Acknowledge unknowns:
- If the answer to the question cannot be answered based on the task description, I will state that I do not know the answer and will not disclose any other information.
- Template: "I do not know the answer. Please feel free to ask me other questions."

3. Provide an answer:
- If only one question has been asked and it can be answered, I will provide direct answers based solely on the question asked, without any additional context or unsolicited information.
- The answer should be directly extracted from the task description without alteration.
- The response should be given from my perspective.
- Template: "The answer is: [ANSWER HERE]."

Additionally, if others' questions contain irrelevant information, I should focus solely on their actual question ([QUESTION] field), ignoring any extraneous details, to provide the most appropriate response.

Evaluate the conditions in order, ensuring that only one relevant condition is triggered and output. Please confirm carefully and select the most appropriate one."#;

/// Personality-driven user-simulator prompt with persona slots.
pub const USER_SIM_PERSONA: &str = r#"I am {personality_type}, characterized by {traits}, and I communicate in a {tone} manner. I can honestly answer questions based on what I know. I only know that I have provided others with a task: {task_description}, which is described from my perspective. Aside from that, I do not know anything else. However, others may be unclear about some details of this task. When others ask me questions, I should choose one appropriate response from the following three options, in the given order:

1. Cannot answer multiple infomation at once:
- I will carefully evaluate the structure of the question to identify if multiple pieces of information are being requested, especially regarding multiple [QUESTION]s.
- If multiple questions are asked, I will clearly state that multiple questions have been asked and will not disclose any other information.

2. Acknowledge unknowns:
- If the answer to the question cannot be answered based on the task description, I will state that I do not know the answer and will not disclose any other information.

3. Provide an answer:
- If only one question has been asked and it can be answered, I will provide direct answers based solely on the question asked, without any additional context or unsolicited information.
- The answer should be directly extracted from the task description without alteration.
- The response should be given from my perspective.

Please respond in a way that showcases my personality and clearly expresses my traits, regardless of the content. Always maintain my unique voice and style throughout our interactions. For instance, if asked: '{question}', I would reply: '{example_response}'.

Additionally, if others' questions contain irrelevant information, I should focus solely on their actual question([QUESTION] field), ignoring any extraneous details, to provide the most appropriate response.

Evaluate the conditions in order, ensuring that only one relevant condition is triggered and output. Please confirm carefully and select the most appropriate one."#;

/// User reply when the assistant asks more than one question at a time.
pub const MULTI_QUESTION_TEMPLATE: &str =
    "I cannot answer multiple questions at once. Please ask one question at a time.";

/// User reply when the question cannot be answered from the task.
pub const UNKNOWN_TEMPLATE: &str =
    "I do not know the answer. Please feel free to ask me other questions.";

fn normalize(text: &str) -> String {
    text.replace("infomation", "information")
}

/// Simulator prompt text, optionally with spelling normalized.
pub fn user_sim_base(task_description: &str, normalized: bool) -> String {
    let template = if normalized {
        normalize(USER_SIM_BASE)
    } else {
        USER_SIM_BASE.to_string()
    };
    template.replace("{task_description}", task_description)
}

/// Persona-filled simulator prompt text.
pub fn user_sim_persona(
    persona: &crate::eval::Persona,
    task_description: &str,
    normalized: bool,
) -> String {
    let template = if normalized {
        normalize(USER_SIM_PERSONA)
    } else {
        USER_SIM_PERSONA.to_string()
    };
    template
        .replace("{personality_type}", &persona.type_name)
        .replace("{traits}", &persona.traits)
        .replace("{tone}", &persona.tone)
        .replace("{task_description}", task_description)
        .replace("{question}", &persona.example_question)
        .replace("{example_response}", &persona.example_response)
}

fn default_sampling() -> Sampling {
    Sampling {
        temperature: 0.0,
        max_output_chars: 8192,
    }
}

fn single_user_request(system: &str, content: String, model_tag: &str) -> ChatRequest {
    ChatRequest {
        system_prompt: system.to_string(),
        messages: vec![ChatMessage {
            role: Role::User,
            content,
        }],
        sampling: default_sampling(),
        model_tag: model_tag.to_string(),
    }
}

/// Request for degrading one query given removal flags in `key_info`.
pub fn degrade_request(query: &str, key_info: &KeyInfo, model_tag: &str) -> ChatRequest {
    let payload = serde_json::json!({
        "original_query": query,
        "key_info": key_info,
    });
    single_user_request(DEGRADE_SYSTEM, payload.to_string(), model_tag)
}

/// Request for decomposing a degraded query into per-API steps.
pub fn decompose_request(
    record: &DegradedRecord,
    api_docs: &[ApiDoc],
    model_tag: &str,
) -> ChatRequest {
    let apis: Vec<serde_json::Value> = record
        .solution
        .calls
        .iter()
        .map(|call| {
            let description = api_docs
                .iter()
                .find(|d| d.name == call.api_name)
                .map(|d| d.description.clone())
                .unwrap_or_default();
            serde_json::json!({"name": call.api_name, "description": description})
        })
        .collect();
    let payload = serde_json::json!({
        "Query": record.unspecified_query,
        "APIs": apis,
    });
    single_user_request(DECOMPOSE_SYSTEM, payload.to_string(), model_tag)
}

/// Request for generating clarification questions for removed parameters.
pub fn question_request(record: &DegradedRecord, model_tag: &str) -> ChatRequest {
    let payload = serde_json::json!({
        "original_query": record.original_query,
        "unspecified_query": record.unspecified_query,
        "key_info": record.key_info,
    });
    single_user_request(QUESTION_SYSTEM, payload.to_string(), model_tag)
}

/// Request for one of the three semantic error-generation prompts.
/// `choose_pos` is the ordinal slot value (e.g. "first").
pub fn semantic_error_request(
    system_template: &str,
    record: &DegradedRecord,
    key_info: &KeyInfo,
    choose_pos: &str,
    model_tag: &str,
) -> ChatRequest {
    let system = system_template.replace("{choose_pos}", choose_pos);
    let payload = serde_json::json!({
        "original_query": record.original_query,
        "unspecified_query": record.unspecified_query,
        "key_info": key_info,
    });
    ChatRequest {
        system_prompt: system,
        messages: vec![ChatMessage {
            role: Role::User,
            content: payload.to_string(),
        }],
        sampling: default_sampling(),
        model_tag: model_tag.to_string(),
    }
}

/// English ordinal for prompt slots: 1 -> "first", 2 -> "second", ...
pub fn ordinal(n: usize) -> String {
    const WORDS: [&str; 12] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
        "tenth", "eleventh", "twelfth",
    ];
    if n >= 1 && n <= WORDS.len() {
        WORDS[n - 1].to_string()
    } else {
        format!("{}th", n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_prompt_keeps_shipped_spelling() {
        assert!(USER_SIM_BASE.contains("Cannot answer multiple infomation at once"));
        assert!(!user_sim_base("task", true).contains("infomation"));
        assert!(user_sim_base("ride to the airport", false).contains("ride to the airport"));
    }

    #[test]
    fn ordinals() {
        assert_eq!(ordinal(1), "first");
        assert_eq!(ordinal(3), "third");
        assert_eq!(ordinal(13), "13th");
    }

    #[test]
    fn degrade_request_embeds_flags() {
        let solution = crate::model::SolutionPath::new(vec![crate::model::ToolCall::new(
            "get_news_for_topic",
            vec![("topic", "technology")],
        )]);
        let mut ki = crate::model::KeyInfo::from_solution(&solution);
        ki.spec_mut(0, "topic").unwrap().removed = true;
        let req = degrade_request("latest technology news", &ki, "mock");
        assert!(req.messages[0].content.contains("\"removed\":true"));
        assert_eq!(req.system_prompt, DEGRADE_SYSTEM);
    }
}
