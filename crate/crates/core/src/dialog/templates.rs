use std::fmt;

use serde::Serialize;

/// Identifier of one agent utterance template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Greeting,
    AskBool,
    AskValue,
    AskProc,
    DemoValue,
    DemoProc,
    DemoFailed,
    AskElse,
    ReuseBool,
    ReuseValue,
    Disambiguate,
    ConfirmBool,
    ConfirmValue,
    ConfirmProc,
    ConfirmRule,
    LearnFailed,
    Rephrase,
    Executed,
    ExecutionFailed,
    Done,
    Undone,
    NothingToUndo,
}

impl Template {
    pub const ALL: [Template; 22] = [
        Template::Greeting,
        Template::AskBool,
        Template::AskValue,
        Template::AskProc,
        Template::DemoValue,
        Template::DemoProc,
        Template::DemoFailed,
        Template::AskElse,
        Template::ReuseBool,
        Template::ReuseValue,
        Template::Disambiguate,
        Template::ConfirmBool,
        Template::ConfirmValue,
        Template::ConfirmProc,
        Template::ConfirmRule,
        Template::LearnFailed,
        Template::Rephrase,
        Template::Executed,
        Template::ExecutionFailed,
        Template::Done,
        Template::Undone,
        Template::NothingToUndo,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Template::Greeting => "greeting",
            Template::AskBool => "ask_bool",
            Template::AskValue => "ask_value",
            Template::AskProc => "ask_proc",
            Template::DemoValue => "demo_value",
            Template::DemoProc => "demo_proc",
            Template::DemoFailed => "demo_failed",
            Template::AskElse => "ask_else",
            Template::ReuseBool => "reuse_bool",
            Template::ReuseValue => "reuse_value",
            Template::Disambiguate => "disambiguate",
            Template::ConfirmBool => "confirm_bool",
            Template::ConfirmValue => "confirm_value",
            Template::ConfirmProc => "confirm_proc",
            Template::ConfirmRule => "confirm_rule",
            Template::LearnFailed => "learn_failed",
            Template::Rephrase => "rephrase",
            Template::Executed => "executed",
            Template::ExecutionFailed => "execution_failed",
            Template::Done => "done",
            Template::Undone => "undone",
            Template::NothingToUndo => "nothing_to_undo",
        }
    }

    pub fn from_id(id: &str) -> Option<Template> {
        Template::ALL.into_iter().find(|t| t.id() == id)
    }

    /// Surface text with `{0}`, `{1}`, ... placeholders.
    pub fn pattern(self) -> &'static str {
        match self {
            Template::Greeting => "Hi! What would you like me to do?",
            Template::AskBool => "How do I know whether {0}?",
            Template::AskValue => "How do I find out the value for {0}?",
            Template::AskProc => "How do I {0}?",
            Template::DemoValue => "OK, show me how to find the value for {0}. Long-press the value when you see it.",
            Template::DemoProc => "OK, show me how to {0}. Tell me when you are done.",
            Template::DemoFailed => "That demonstration did not work: {0}. Please try again.",
            Template::AskElse => "What should I do if {0}?",
            Template::ReuseBool => {
                "I already know how to tell whether {0} when determining whether to {1}. Is it the same here when determining whether to {2}?"
            }
            Template::ReuseValue => {
                "I already know how to find out the value for {0} using the {1} app. Should I use that for determining whether {2}?"
            }
            Template::Disambiguate => {
                "I understand you are trying to compare the value concept '{0}' and the value '{1}', should '{0}' be greater than, or less than '{1}'?"
            }
            Template::ConfirmBool => "OK, {0} means {1}. Is that right?",
            Template::ConfirmValue => "OK, I learned how to find out the value for {0}. Is that right?",
            Template::ConfirmProc => "OK, I learned how to {0}. Is that right?",
            Template::ConfirmRule => "So I will {0}. Is that right?",
            Template::LearnFailed => "I could not learn that: {0}.",
            Template::Rephrase => "Sorry, I did not understand \"{0}\". Could you say it another way?",
            Template::Executed => "Done: {0}.",
            Template::ExecutionFailed => "I could not do that: {0}.",
            Template::Done => "Great, I saved this as \"{0}\".",
            Template::Undone => "OK, I went back one step.",
            Template::NothingToUndo => "There is nothing to undo.",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One agent utterance: template, arguments, rendered text and answer options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentMove {
    pub template: Template,
    pub args: Vec<String>,
    pub text: String,
    pub options: Vec<String>,
}

impl AgentMove {
    pub fn new(template: Template, args: Vec<String>) -> Self {
        let mut text = template.pattern().to_string();
        for (i, a) in args.iter().enumerate() {
            text = text.replace(&format!("{{{i}}}"), a);
        }
        AgentMove {
            template,
            args,
            text,
            options: Vec::new(),
        }
    }

    pub fn with_options(mut self, options: Vec<String>) -> Self {
        self.options = options;
        self
    }
}

pub(crate) fn yes_no() -> Vec<String> {
    vec!["yes".to_string(), "no".to_string()]
}
