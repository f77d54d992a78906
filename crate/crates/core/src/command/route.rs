//! Verb table, routing and argument binding.

use std::fmt;

use super::grammar::CommandLine;

/// Executor identity a command is dispatched to. `openclaw` sub-routes by
/// the head of its verb path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Surface {
    Tasks,
    Calendar,
    Email,
    File,
    Weather,
    Curl,
    OpenclawConfig,
    OpenclawModels,
    OpenclawCron,
    OpenclawChannels,
    OpenclawMessage,
    OpenclawSecurity,
}

impl Surface {
    pub const ALL: [Surface; 12] = [
        Surface::Tasks,
        Surface::Calendar,
        Surface::Email,
        Surface::File,
        Surface::Weather,
        Surface::Curl,
        Surface::OpenclawConfig,
        Surface::OpenclawModels,
        Surface::OpenclawCron,
        Surface::OpenclawChannels,
        Surface::OpenclawMessage,
        Surface::OpenclawSecurity,
    ];

    pub fn family(self) -> &'static str {
        match self {
            Surface::Tasks => "tasks",
            Surface::Calendar => "calendar",
            Surface::Email => "email",
            Surface::File => "file",
            Surface::Weather => "weather",
            Surface::Curl => "curl",
            _ => "openclaw",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Surface::OpenclawConfig => "openclaw/config",
            Surface::OpenclawModels => "openclaw/models",
            Surface::OpenclawCron => "openclaw/cron",
            Surface::OpenclawChannels => "openclaw/channels",
            Surface::OpenclawMessage => "openclaw/message",
            Surface::OpenclawSecurity => "openclaw/security",
            other => other.family(),
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verb {
    TasksList,
    TasksSearch,
    TasksAdd,
    TasksComplete,
    CalendarList,
    CalendarToday,
    CalendarAddEvent,
    EmailSearch,
    EmailRead,
    EmailSend,
    FileCreate,
    FileRead,
    WeatherForecast,
    ConfigGet,
    ModelsSet,
    CronList,
    CronAdd,
    ChannelsList,
    ChannelsLogin,
    MessageSend,
    SecurityAudit,
    Curl,
}

/// One row of the verb table.
#[derive(Debug)]
pub struct VerbSpec {
    pub verb: Verb,
    pub surface: Surface,
    pub path: &'static [&'static str],
    pub positionals: &'static [&'static str],
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
    pub switches: &'static [&'static str],
    pub read_only: bool,
}

impl VerbSpec {
    /// `tasks add --title <title> [--priority <priority>] ...`
    pub fn usage(&self) -> String {
        let mut parts = vec![self.surface.family().to_string()];
        parts.extend(self.path.iter().map(|s| s.to_string()));
        parts.extend(self.positionals.iter().map(|p| format!("<{p}>")));
        parts.extend(self.required.iter().map(|f| format!("--{f} <{f}>")));
        parts.extend(self.optional.iter().map(|f| format!("[--{f} <{f}>]")));
        parts.extend(self.switches.iter().map(|f| format!("[--{f}]")));
        parts.join(" ")
    }
}

macro_rules! verb {
    ($verb:ident, $surface:ident, [$($path:literal),*], pos [$($pos:literal),*], req [$($req:literal),*], opt [$($opt:literal),*], sw [$($sw:literal),*], $ro:expr) => {
        VerbSpec {
            verb: Verb::$verb,
            surface: Surface::$surface,
            path: &[$($path),*],
            positionals: &[$($pos),*],
            required: &[$($req),*],
            optional: &[$($opt),*],
            switches: &[$($sw),*],
            read_only: $ro,
        }
    };
}

pub const VERBS: &[VerbSpec] = &[
    verb!(TasksList, Tasks, ["list"], pos [], req [], opt ["status"], sw [], true),
    verb!(TasksSearch, Tasks, ["search"], pos [], req ["query"], opt [], sw [], true),
    verb!(TasksAdd, Tasks, ["add"], pos [], req ["title"], opt ["priority", "due"], sw [], false),
    verb!(TasksComplete, Tasks, ["complete"], pos [], req ["title"], opt [], sw [], false),
    verb!(CalendarList, Calendar, ["list"], pos [], req [], opt ["from", "to"], sw [], true),
    verb!(CalendarToday, Calendar, ["today"], pos [], req [], opt ["timezone"], sw [], true),
    verb!(CalendarAddEvent, Calendar, ["add-event"], pos [], req ["title", "start"], opt [], sw [], false),
    verb!(EmailSearch, Email, ["search"], pos [], req ["query"], opt [], sw [], true),
    verb!(EmailRead, Email, ["read"], pos [], req ["id"], opt [], sw [], true),
    verb!(EmailSend, Email, ["send"], pos [], req ["to", "subject", "body"], opt [], sw [], false),
    verb!(FileCreate, File, ["create"], pos [], req ["path", "content"], opt [], sw [], false),
    verb!(FileRead, File, ["read"], pos [], req ["path"], opt [], sw [], true),
    verb!(WeatherForecast, Weather, ["forecast"], pos [], req ["location"], opt ["days"], sw [], true),
    verb!(ConfigGet, OpenclawConfig, ["config", "get"], pos ["key"], req [], opt [], sw [], true),
    verb!(ModelsSet, OpenclawModels, ["models", "set"], pos ["model"], req [], opt [], sw [], false),
    verb!(CronList, OpenclawCron, ["cron", "list"], pos [], req [], opt [], sw [], true),
    verb!(CronAdd, OpenclawCron, ["cron", "add"], pos [], req ["name", "cron", "message"], opt [], sw [], false),
    verb!(ChannelsList, OpenclawChannels, ["channels", "list"], pos [], req [], opt [], sw ["json"], true),
    verb!(ChannelsLogin, OpenclawChannels, ["channels", "login"], pos [], req ["channel"], opt [], sw [], false),
    verb!(MessageSend, OpenclawMessage, ["message", "send"], pos [], req ["channel", "target", "message"], opt [], sw [], false),
    verb!(SecurityAudit, OpenclawSecurity, ["security", "audit"], pos [], req [], opt [], sw [], true),
    verb!(Curl, Curl, [], pos ["url"], req [], opt [], sw [], true),
];

pub fn spec_for(verb: Verb) -> &'static VerbSpec {
    VERBS
        .iter()
        .find(|s| s.verb == verb)
        .expect("every verb has a table row")
}

/// Static grammar summary handed to agents as command hints.
pub fn command_hints() -> String {
    let mut lines: Vec<String> = VERBS.iter().map(VerbSpec::usage).collect();
    lines.push("done | exit | quit".to_string());
    lines.join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RouteError {
    #[error("unknown command: {0}")]
    UnknownFamily(String),
    #[error("unknown command: {family} {verb}")]
    UnknownVerb { family: String, verb: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}\nusage: {usage}")]
pub struct UsageError {
    pub reason: String,
    pub usage: String,
}

/// Maps a parsed command to its verb-table row.
pub fn route(cmd: &CommandLine) -> Result<&'static VerbSpec, RouteError> {
    if !VERBS.iter().any(|s| s.surface.family() == cmd.family) {
        return Err(RouteError::UnknownFamily(cmd.family.clone()));
    }
    VERBS
        .iter()
        .find(|s| s.surface.family() == cmd.family && s.path == cmd.verb_path.as_slice())
        .ok_or_else(|| RouteError::UnknownVerb {
            family: cmd.family.clone(),
            verb: cmd.verb_path.join(" "),
        })
}

/// A fully bound command. Values are raw text; semantic validation
/// (dates, priorities, addresses) belongs to the executors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    TasksList { status: Option<String> },
    TasksSearch { query: String },
    TasksAdd { title: String, priority: Option<String>, due: Option<String> },
    TasksComplete { title: String },
    CalendarList { from: Option<String>, to: Option<String> },
    CalendarToday { timezone: Option<String> },
    CalendarAddEvent { title: String, start: String },
    EmailSearch { query: String },
    EmailRead { id: String },
    EmailSend { to: String, subject: String, body: String },
    FileCreate { path: String, content: String },
    FileRead { path: String },
    WeatherForecast { location: String, days: Option<String> },
    ConfigGet { key: String },
    ModelsSet { model: String },
    CronList,
    CronAdd { name: String, cron: String, message: String },
    ChannelsList { json: bool },
    ChannelsLogin { channel: String },
    MessageSend { channel: String, target: String, message: String },
    SecurityAudit,
    Curl { url: String },
}

impl Command {
    pub fn verb(&self) -> Verb {
        match self {
            Command::TasksList { .. } => Verb::TasksList,
            Command::TasksSearch { .. } => Verb::TasksSearch,
            Command::TasksAdd { .. } => Verb::TasksAdd,
            Command::TasksComplete { .. } => Verb::TasksComplete,
            Command::CalendarList { .. } => Verb::CalendarList,
            Command::CalendarToday { .. } => Verb::CalendarToday,
            Command::CalendarAddEvent { .. } => Verb::CalendarAddEvent,
            Command::EmailSearch { .. } => Verb::EmailSearch,
            Command::EmailRead { .. } => Verb::EmailRead,
            Command::EmailSend { .. } => Verb::EmailSend,
            Command::FileCreate { .. } => Verb::FileCreate,
            Command::FileRead { .. } => Verb::FileRead,
            Command::WeatherForecast { .. } => Verb::WeatherForecast,
            Command::ConfigGet { .. } => Verb::ConfigGet,
            Command::ModelsSet { .. } => Verb::ModelsSet,
            Command::CronList => Verb::CronList,
            Command::CronAdd { .. } => Verb::CronAdd,
            Command::ChannelsList { .. } => Verb::ChannelsList,
            Command::ChannelsLogin { .. } => Verb::ChannelsLogin,
            Command::MessageSend { .. } => Verb::MessageSend,
            Command::SecurityAudit => Verb::SecurityAudit,
            Command::Curl { .. } => Verb::Curl,
        }
    }

    pub fn surface(&self) -> Surface {
        spec_for(self.verb()).surface
    }
}

/// Checks arity and flag names against the table row and builds a `Command`.
pub fn bind(cmd: &CommandLine, spec: &VerbSpec) -> Result<Command, UsageError> {
    let usage = || spec.usage();
    if cmd.positionals.len() != spec.positionals.len() {
        return Err(UsageError {
            reason: format!(
                "expected {} positional argument(s), got {}",
                spec.positionals.len(),
                cmd.positionals.len()
            ),
            usage: usage(),
        });
    }
    for (name, _) in &cmd.flags {
        let known = spec.required.contains(&name.as_str())
            || spec.optional.contains(&name.as_str())
            || spec.switches.contains(&name.as_str());
        if !known {
            return Err(UsageError {
                reason: format!("unknown flag --{name}"),
                usage: usage(),
            });
        }
    }
    for name in spec.required {
        if !cmd.has_flag(name) {
            return Err(UsageError {
                reason: format!("missing required flag --{name}"),
                usage: usage(),
            });
        }
    }
    let req = |name: &str| cmd.flag(name).unwrap_or_default().to_string();
    let opt = |name: &str| cmd.flag(name).map(str::to_string);
    let pos = |i: usize| cmd.positionals[i].clone();
    Ok(match spec.verb {
        Verb::TasksList => Command::TasksList { status: opt("status") },
        Verb::TasksSearch => Command::TasksSearch { query: req("query") },
        Verb::TasksAdd => Command::TasksAdd {
            title: req("title"),
            priority: opt("priority"),
            due: opt("due"),
        },
        Verb::TasksComplete => Command::TasksComplete { title: req("title") },
        Verb::CalendarList => Command::CalendarList { from: opt("from"), to: opt("to") },
        Verb::CalendarToday => Command::CalendarToday { timezone: opt("timezone") },
        Verb::CalendarAddEvent => Command::CalendarAddEvent {
            title: req("title"),
            start: req("start"),
        },
        Verb::EmailSearch => Command::EmailSearch { query: req("query") },
        Verb::EmailRead => Command::EmailRead { id: req("id") },
        Verb::EmailSend => Command::EmailSend {
            to: req("to"),
            subject: req("subject"),
            body: req("body"),
        },
        Verb::FileCreate => Command::FileCreate {
            path: req("path"),
            content: req("content"),
        },
        Verb::FileRead => Command::FileRead { path: req("path") },
        Verb::WeatherForecast => Command::WeatherForecast {
            location: req("location"),
            days: opt("days"),
        },
        Verb::ConfigGet => Command::ConfigGet { key: pos(0) },
        Verb::ModelsSet => Command::ModelsSet { model: pos(0) },
        Verb::CronList => Command::CronList,
        Verb::CronAdd => Command::CronAdd {
            name: req("name"),
            cron: req("cron"),
            message: req("message"),
        },
        Verb::ChannelsList => Command::ChannelsList { json: cmd.has_flag("json") },
        Verb::ChannelsLogin => Command::ChannelsLogin { channel: req("channel") },
        Verb::MessageSend => Command::MessageSend {
            channel: req("channel"),
            target: req("target"),
            message: req("message"),
        },
        Verb::SecurityAudit => Command::SecurityAudit,
        Verb::Curl => Command::Curl { url: pos(0) },
    })
}
