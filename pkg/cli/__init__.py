"""Консольный драйвер экспериментов"""
