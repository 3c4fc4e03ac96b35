from Cli.cli import cli

cli(obj={})
