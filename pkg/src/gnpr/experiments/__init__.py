"""Desk-scale experiment harness and the ``pr`` command line tool."""
